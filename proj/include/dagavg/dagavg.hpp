#ifndef DAGAVG_DAGAVG_HPP
#define DAGAVG_DAGAVG_HPP

#include "dagavg/averaging.hpp"
#include "dagavg/candidates.hpp"
#include "dagavg/core.hpp"
#include "dagavg/fit.hpp"
#include "dagavg/io.hpp"
#include "dagavg/metrics.hpp"
#include "dagavg/rng.hpp"
#include "dagavg/simulation.hpp"
#include "dagavg/svg_plot.hpp"
#include "dagavg/synth.hpp"

#endif  // DAGAVG_DAGAVG_HPP
