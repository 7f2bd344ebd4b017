#pragma once

#include "ebstab/core.hpp"
#include "ebstab/model.hpp"
#include "ebstab/model_io.hpp"
#include "ebstab/calculus.hpp"
#include "ebstab/minimax.hpp"
#include "ebstab/projection.hpp"
#include "ebstab/moduli.hpp"
#include "ebstab/stability.hpp"
#include "ebstab/hoffman.hpp"
#include "ebstab/report.hpp"
#include "ebstab/oracle.hpp"
#include "ebstab/fixtures.hpp"
#include "ebstab/repro.hpp"
