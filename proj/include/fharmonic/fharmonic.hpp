#pragma once

/// @file fharmonic.hpp
/// @brief Umbrella header.

#include "fharmonic/vec.hpp"
#include "fharmonic/grid.hpp"
#include "fharmonic/coupling.hpp"
#include "fharmonic/cutoff.hpp"
#include "fharmonic/field.hpp"
#include "fharmonic/operators.hpp"
#include "fharmonic/diagnostics.hpp"
#include "fharmonic/flow.hpp"
#include "fharmonic/relax.hpp"
#include "fharmonic/checks.hpp"
#include "fharmonic/io/config.hpp"
#include "fharmonic/io/snapshot.hpp"
#include "fharmonic/io/ledger.hpp"
#include "fharmonic/io/commands.hpp"
