#pragma once

#include "condexp/counterexample.hpp"
#include "condexp/errors.hpp"
#include "condexp/operators.hpp"
#include "condexp/report.hpp"
#include "condexp/rng.hpp"
#include "condexp/sequences.hpp"
#include "condexp/space.hpp"
#include "condexp/space_io.hpp"
#include "condexp/sufficiency.hpp"
