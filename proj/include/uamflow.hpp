#pragma once

#include "uamflow/acoustics.hpp"
#include "uamflow/energy.hpp"
#include "uamflow/errors.hpp"
#include "uamflow/exposure.hpp"
#include "uamflow/geometry.hpp"
#include "uamflow/harness.hpp"
#include "uamflow/lp.hpp"
#include "uamflow/network.hpp"
#include "uamflow/optimizer.hpp"
#include "uamflow/scenario.hpp"
#include "uamflow/welfare.hpp"
