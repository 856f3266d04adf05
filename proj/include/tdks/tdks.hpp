#pragma once

#include "tdks/domain_basis.hpp"
#include "tdks/potentials.hpp"
#include "tdks/control_signal.hpp"
#include "tdks/trajectory.hpp"
#include "tdks/galerkin_system.hpp"
#include "tdks/propagator.hpp"
#include "tdks/estimates.hpp"
#include "tdks/control.hpp"
#include "tdks/config.hpp"
#include "tdks/run.hpp"
