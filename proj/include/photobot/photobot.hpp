#pragma once

#include "photobot/error.hpp"
#include "photobot/panorama.hpp"
#include "photobot/world.hpp"
#include "photobot/photo_env.hpp"
#include "photobot/policy_net.hpp"
#include "photobot/a2c.hpp"
#include "photobot/oracle.hpp"
#include "photobot/tracker.hpp"
#include "photobot/composer.hpp"
#include "photobot/config.hpp"
#include "photobot/io.hpp"
#include "photobot/experiments.hpp"
