#pragma once

#include "nms/csv.hpp"
#include "nms/dressed.hpp"
#include "nms/dynamics.hpp"
#include "nms/eigenvalues.hpp"
#include "nms/error.hpp"
#include "nms/fitting.hpp"
#include "nms/levenberg_marquardt.hpp"
#include "nms/linalg.hpp"
#include "nms/normal_modes.hpp"
#include "nms/oracle.hpp"
#include "nms/parallel.hpp"
#include "nms/params.hpp"
#include "nms/spectrum.hpp"
#include "nms/units.hpp"
