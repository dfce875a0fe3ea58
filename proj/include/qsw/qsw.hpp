#pragma once

#include "qsw/channel.hpp"
#include "qsw/ctreduce.hpp"
#include "qsw/ensemble.hpp"
#include "qsw/fit.hpp"
#include "qsw/graph.hpp"
#include "qsw/io.hpp"
#include "qsw/linalg.hpp"
#include "qsw/protocol.hpp"
#include "qsw/random.hpp"
