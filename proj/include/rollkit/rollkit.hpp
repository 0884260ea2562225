#pragma once

#include "rollkit/errors.hpp"
#include "rollkit/matrix_core.hpp"
#include "rollkit/jet.hpp"
#include "rollkit/manifold.hpp"
#include "rollkit/connection.hpp"
#include "rollkit/vector_field.hpp"
#include "rollkit/rolling.hpp"
#include "rollkit/flag.hpp"
#include "rollkit/io.hpp"
#include "rollkit/scenarios.hpp"
#include "rollkit/verify_suite.hpp"
