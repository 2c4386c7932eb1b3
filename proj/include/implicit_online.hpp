#ifndef IMPLICIT_ONLINE_HPP
#define IMPLICIT_ONLINE_HPP

#include "implicit_online/core.hpp"
#include "implicit_online/data.hpp"
#include "implicit_online/experiment.hpp"
#include "implicit_online/geometry.hpp"
#include "implicit_online/learners.hpp"
#include "implicit_online/losses.hpp"
#include "implicit_online/metrics.hpp"
#include "implicit_online/prox.hpp"

#endif  // IMPLICIT_ONLINE_HPP
