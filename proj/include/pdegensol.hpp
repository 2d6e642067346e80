#pragma once

// Umbrella header: expression core, catalog, numeric engine and verifier.
#include "pdegensol/catalog.hpp"
#include "pdegensol/errors.hpp"
#include "pdegensol/evaluator.hpp"
#include "pdegensol/expr.hpp"
#include "pdegensol/function_instance.hpp"
#include "pdegensol/jet.hpp"
#include "pdegensol/numeric_config.hpp"
#include "pdegensol/parser.hpp"
#include "pdegensol/quadrature.hpp"
#include "pdegensol/report.hpp"
#include "pdegensol/roots.hpp"
#include "pdegensol/symbolic.hpp"
#include "pdegensol/verifier.hpp"
