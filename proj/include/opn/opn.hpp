#pragma once

// Umbrella header: the whole engine.

#include "opn/arith.hpp"
#include "opn/branch.hpp"
#include "opn/certify.hpp"
#include "opn/factor.hpp"
#include "opn/primality.hpp"
#include "opn/search.hpp"
#include "opn/transcript.hpp"
#include "opn/verify.hpp"
