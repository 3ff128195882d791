#pragma once

#include "pubflow/adapt.hpp"
#include "pubflow/audit.hpp"
#include "pubflow/bus.hpp"
#include "pubflow/dag.hpp"
#include "pubflow/dataset.hpp"
#include "pubflow/dlc.hpp"
#include "pubflow/em.hpp"
#include "pubflow/errors.hpp"
#include "pubflow/kernels.hpp"
#include "pubflow/live.hpp"
#include "pubflow/scenario.hpp"
#include "pubflow/simulator.hpp"
#include "pubflow/workflow_io.hpp"
#include "pubflow/workspace.hpp"
