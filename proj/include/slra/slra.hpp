#pragma once

#include "slra/accessor.hpp"
#include "slra/bench.hpp"
#include "slra/core.hpp"
#include "slra/cur.hpp"
#include "slra/errest.hpp"
#include "slra/error.hpp"
#include "slra/lanczos.hpp"
#include "slra/matgen.hpp"
#include "slra/matrix_market.hpp"
#include "slra/random.hpp"
#include "slra/refine.hpp"
#include "slra/sketch.hpp"
#include "slra/topsvd.hpp"
