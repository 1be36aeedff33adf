#pragma once

// Umbrella header for the bi-fidelity VAE toolkit.

#include "bfvae/error.hpp"
#include "bfvae/ndcore/activation.hpp"
#include "bfvae/ndcore/adam.hpp"
#include "bfvae/ndcore/matrix.hpp"
#include "bfvae/ndcore/mlp.hpp"
#include "bfvae/ndcore/rng.hpp"
#include "bfvae/vae/vae.hpp"
#include "bfvae/bifi/bifi.hpp"
#include "bfvae/metrics/kid.hpp"
#include "bfvae/datagen/beam.hpp"
#include "bfvae/datagen/burgers.hpp"
#include "bfvae/datagen/resample.hpp"
#include "bfvae/datagen/dataset.hpp"
#include "bfvae/datagen/dataset_io.hpp"
#include "bfvae/cli/checkpoint.hpp"
#include "bfvae/cli/config.hpp"
#include "bfvae/cli/experiment.hpp"
#include "bfvae/cli/commands.hpp"
