#pragma once

// Umbrella header.

#include "railplan/chain.hpp"
#include "railplan/core.hpp"
#include "railplan/curves.hpp"
#include "railplan/io.hpp"
#include "railplan/load.hpp"
#include "railplan/optimizer.hpp"
#include "railplan/power.hpp"
#include "railplan/sequence.hpp"
