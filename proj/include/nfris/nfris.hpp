#pragma once

#include "nfris/access.hpp"
#include "nfris/channel.hpp"
#include "nfris/codebook_io.hpp"
#include "nfris/core.hpp"
#include "nfris/detection.hpp"
#include "nfris/geometry.hpp"
#include "nfris/harness.hpp"
#include "nfris/ris_design.hpp"
#include "nfris/rng.hpp"
#include "nfris/scenario.hpp"
