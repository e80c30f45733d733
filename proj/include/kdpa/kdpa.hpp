#pragma once

#include "kdpa/error.hpp"
#include "kdpa/numeric.hpp"
#include "kdpa/random.hpp"
#include "kdpa/parallel.hpp"
#include "kdpa/dist.hpp"
#include "kdpa/prophet.hpp"
#include "kdpa/equilibrium.hpp"
#include "kdpa/auction.hpp"
#include "kdpa/oracle.hpp"
#include "kdpa/verify.hpp"
