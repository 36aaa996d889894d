#pragma once

#include "landis/config.hpp"
#include "landis/corrector.hpp"
#include "landis/decay.hpp"
#include "landis/eigen.hpp"
#include "landis/error.hpp"
#include "landis/fft.hpp"
#include "landis/field_io.hpp"
#include "landis/fundamental.hpp"
#include "landis/grid.hpp"
#include "landis/interp.hpp"
#include "landis/linalg.hpp"
#include "landis/mask.hpp"
#include "landis/nodal.hpp"
#include "landis/pde.hpp"
#include "landis/pipeline.hpp"
#include "landis/poincare.hpp"
#include "landis/puncture.hpp"
#include "landis/quasiconformal.hpp"
#include "landis/report.hpp"
#include "landis/svg.hpp"
#include "landis/toy.hpp"
