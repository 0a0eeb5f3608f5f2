#pragma once

// Umbrella header. Replay-graph navigation memory for web agents: a bounded
// observation graph searched best-first with oracle heuristics, a reflection
// pipeline that salvages failed trajectories, and a key-value reflective
// memory that feeds corrected trajectories back as demonstrations.

#include "retrace/buffer.hpp"
#include "retrace/cli.hpp"
#include "retrace/config.hpp"
#include "retrace/core.hpp"
#include "retrace/env.hpp"
#include "retrace/errors.hpp"
#include "retrace/memory.hpp"
#include "retrace/metrics.hpp"
#include "retrace/oracle.hpp"
#include "retrace/record_io.hpp"
#include "retrace/reflect.hpp"
#include "retrace/remote.hpp"
#include "retrace/runtime.hpp"
#include "retrace/search.hpp"
