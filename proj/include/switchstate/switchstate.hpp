#pragma once

#include "switchstate/config.hpp"
#include "switchstate/controller.hpp"
#include "switchstate/errors.hpp"
#include "switchstate/linalg.hpp"
#include "switchstate/oracle.hpp"
#include "switchstate/plant.hpp"
#include "switchstate/random.hpp"
#include "switchstate/simulator.hpp"
#include "switchstate/workflow.hpp"
