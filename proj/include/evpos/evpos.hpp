#ifndef EVPOS_EVPOS_HPP
#define EVPOS_EVPOS_HPP

#include "evpos/errors.hpp"
#include "evpos/lattice.hpp"
#include "evpos/scc.hpp"
#include "evpos/expm.hpp"
#include "evpos/semigroup.hpp"
#include "evpos/models.hpp"
#include "evpos/positivity.hpp"
#include "evpos/irreducibility.hpp"
#include "evpos/spectral.hpp"
#include "evpos/quadrature.hpp"
#include "evpos/perturbation.hpp"
#include "evpos/rational_step.hpp"
#include "evpos/walsh_model.hpp"
#include "evpos/incomplete_gamma.hpp"
#include "evpos/gamma_shift.hpp"
#include "evpos/coupled_gamma.hpp"
#include "evpos/json_io.hpp"
#include "evpos/report.hpp"
#include "evpos/worked_examples.hpp"
#include "evpos/timeseries.hpp"

#endif // EVPOS_EVPOS_HPP
