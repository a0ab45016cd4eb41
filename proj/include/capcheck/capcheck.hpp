#pragma once

#include "capture.hpp"
#include "checker.hpp"
#include "diagnostic.hpp"
#include "evaluator.hpp"
#include "harness.hpp"
#include "parser.hpp"
#include "printer.hpp"
#include "subtyping.hpp"
#include "syntax.hpp"
