#pragma once

#include "twinhet/errors.hpp"
#include "twinhet/linalg.hpp"
#include "twinhet/fock.hpp"
#include "twinhet/twinbeam.hpp"
#include "twinhet/heterodyne.hpp"
#include "twinhet/current_frame.hpp"
#include "twinhet/experiments.hpp"
#include "twinhet/interaction.hpp"
