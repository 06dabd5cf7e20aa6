#pragma once

#include "qsdc/chsh.hpp"
#include "qsdc/equivalence.hpp"
#include "qsdc/errors.hpp"
#include "qsdc/linalg.hpp"
#include "qsdc/measurement.hpp"
#include "qsdc/protocol.hpp"
#include "qsdc/random.hpp"
#include "qsdc/state.hpp"
#include "qsdc/su2.hpp"
