#pragma once

#include <chebsched/chebyshev.hpp>
#include <chebsched/checks.hpp>
#include <chebsched/errors.hpp>
#include <chebsched/experiments.hpp>
#include <chebsched/io.hpp>
#include <chebsched/optimize.hpp>
#include <chebsched/parallel.hpp>
#include <chebsched/polybounds.hpp>
#include <chebsched/problems.hpp>
#include <chebsched/schedule.hpp>
