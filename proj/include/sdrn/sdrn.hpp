#ifndef SDRN_SDRN_HPP
#define SDRN_SDRN_HPP

#include "sdrn/csv.hpp"
#include "sdrn/error.hpp"
#include "sdrn/estimator.hpp"
#include "sdrn/evalsuite.hpp"
#include "sdrn/losses.hpp"
#include "sdrn/model_io.hpp"
#include "sdrn/parallel.hpp"
#include "sdrn/random.hpp"
#include "sdrn/relu_graph.hpp"
#include "sdrn/relu_product.hpp"
#include "sdrn/sparse_grid.hpp"

#endif  // SDRN_SDRN_HPP
