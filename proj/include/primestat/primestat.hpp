#pragma once

#include "primestat/error.hpp"
#include "primestat/experiment.hpp"
#include "primestat/fitting.hpp"
#include "primestat/ktuple.hpp"
#include "primestat/models.hpp"
#include "primestat/sieve.hpp"
