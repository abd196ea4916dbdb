#pragma once

// Umbrella header: global-score precision bounds for classical and quantum
// estimation over finite parameter domains.

#include "gsb/bayesian.hpp"
#include "gsb/classical.hpp"
#include "gsb/error.hpp"
#include "gsb/estimators.hpp"
#include "gsb/linalg.hpp"
#include "gsb/model.hpp"
#include "gsb/quantum.hpp"
#include "gsb/repetition.hpp"
