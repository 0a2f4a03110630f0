#ifndef DAUCTION_DAUCTION_HPP
#define DAUCTION_DAUCTION_HPP

// Solver and mechanism headers. io.hpp is separate because it needs
// nlohmann/json and OpenSSL.
#include "dauction/common.hpp"
#include "dauction/efficiency.hpp"
#include "dauction/network_pricing.hpp"
#include "dauction/numeric.hpp"
#include "dauction/pall.hpp"
#include "dauction/pam.hpp"
#include "dauction/payoff_models.hpp"
#include "dauction/ptm.hpp"
#include "dauction/scenario.hpp"
#include "dauction/search_box.hpp"
#include "dauction/system_optimum.hpp"

#endif  // DAUCTION_DAUCTION_HPP
