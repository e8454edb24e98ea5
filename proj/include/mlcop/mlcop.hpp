#pragma once

#include "mlcop/dist.hpp"
#include "mlcop/empirical.hpp"
#include "mlcop/power.hpp"
#include "mlcop/report_json.hpp"
#include "mlcop/rng.hpp"
#include "mlcop/scores.hpp"
#include "mlcop/simulate.hpp"
#include "mlcop/stats.hpp"
#include "mlcop/theory.hpp"
