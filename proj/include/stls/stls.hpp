#pragma once

#include "stls/structure.hpp"
#include "stls/lift.hpp"
#include "stls/sdp.hpp"
#include "stls/solver.hpp"
#include "stls/certificate.hpp"
#include "stls/naive.hpp"
#include "stls/extract.hpp"
#include "stls/baseline.hpp"
#include "stls/bench.hpp"
