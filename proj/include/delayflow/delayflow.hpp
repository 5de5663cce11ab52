#pragma once

#include "delayflow/baselines.hpp"
#include "delayflow/decompose.hpp"
#include "delayflow/errors.hpp"
#include "delayflow/experiment.hpp"
#include "delayflow/generator.hpp"
#include "delayflow/graph.hpp"
#include "delayflow/io.hpp"
#include "delayflow/lp.hpp"
#include "delayflow/pass.hpp"
#include "delayflow/problem.hpp"
