#pragma once

#include "sampleguard/assumptions.hpp"
#include "sampleguard/control.hpp"
#include "sampleguard/duration.hpp"
#include "sampleguard/error.hpp"
#include "sampleguard/formula.hpp"
#include "sampleguard/grid.hpp"
#include "sampleguard/monitor.hpp"
#include "sampleguard/random.hpp"
#include "sampleguard/semantics.hpp"
#include "sampleguard/simulator.hpp"
#include "sampleguard/smc.hpp"
#include "sampleguard/strengthen.hpp"
#include "sampleguard/syntax.hpp"
#include "sampleguard/trace.hpp"
#include "sampleguard/trace_io.hpp"
