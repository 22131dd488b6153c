#pragma once

#include "neusum/autograd.hpp"
#include "neusum/checkpoint.hpp"
#include "neusum/corpus.hpp"
#include "neusum/diagnostics.hpp"
#include "neusum/error.hpp"
#include "neusum/grad_check.hpp"
#include "neusum/inference.hpp"
#include "neusum/model.hpp"
#include "neusum/optim.hpp"
#include "neusum/oracle.hpp"
#include "neusum/parallel.hpp"
#include "neusum/porter.hpp"
#include "neusum/random.hpp"
#include "neusum/rouge.hpp"
#include "neusum/tensor.hpp"
#include "neusum/trainer.hpp"
