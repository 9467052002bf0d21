#pragma once

#include "cars/bench.hpp"
#include "cars/config.hpp"
#include "cars/engine.hpp"
#include "cars/error.hpp"
#include "cars/evaluator.hpp"
#include "cars/external_evaluator.hpp"
#include "cars/fitness.hpp"
#include "cars/ga.hpp"
#include "cars/json_io.hpp"
#include "cars/knn.hpp"
#include "cars/problem.hpp"
#include "cars/report.hpp"
#include "cars/rng.hpp"
#include "cars/run_log.hpp"
#include "cars/schedule.hpp"
#include "cars/study.hpp"
#include "cars/surrogates.hpp"
#include "cars/tensor.hpp"
