#pragma once

#include "wobble/data_io.hpp"
#include "wobble/detect.hpp"
#include "wobble/error.hpp"
#include "wobble/matrix.hpp"
#include "wobble/measure.hpp"
#include "wobble/mlp.hpp"
#include "wobble/oracle.hpp"
#include "wobble/philox.hpp"
#include "wobble/sampling.hpp"
#include "wobble/serialize.hpp"
#include "wobble/special.hpp"
#include "wobble/stats.hpp"
#include "wobble/wire.hpp"
