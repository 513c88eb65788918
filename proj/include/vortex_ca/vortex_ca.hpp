#pragma once

#include "kinematics.hpp"
#include "fields.hpp"
#include "control.hpp"
#include "engine.hpp"
#include "analysis.hpp"
#include "scenario_io.hpp"
#include "log_io.hpp"
#include "commands.hpp"
