#pragma once

#include "divbound/bounds.hpp"
#include "divbound/elliptical.hpp"
#include "divbound/error.hpp"
#include "divbound/gamma_tv.hpp"
#include "divbound/oracle.hpp"
#include "divbound/parallel.hpp"
#include "divbound/quadrature.hpp"
#include "divbound/reduction.hpp"
#include "divbound/specfun.hpp"
#include "divbound/student_normal.hpp"
