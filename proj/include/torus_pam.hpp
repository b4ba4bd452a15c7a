#pragma once

#include "torus_pam/bridge.hpp"
#include "torus_pam/covariance.hpp"
#include "torus_pam/errors.hpp"
#include "torus_pam/experiments.hpp"
#include "torus_pam/feynman_kac.hpp"
#include "torus_pam/fft.hpp"
#include "torus_pam/heat_kernel.hpp"
#include "torus_pam/holder.hpp"
#include "torus_pam/io.hpp"
#include "torus_pam/lattice.hpp"
#include "torus_pam/moment_calculus.hpp"
#include "torus_pam/noise_field.hpp"
#include "torus_pam/pam_solver.hpp"
#include "torus_pam/parallel.hpp"
#include "torus_pam/resolvent.hpp"
#include "torus_pam/rng.hpp"
#include "torus_pam/stats.hpp"
#include "torus_pam/torus.hpp"
