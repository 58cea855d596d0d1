#pragma once

#include "defvec/autoencoder.hpp"
#include "defvec/checkpoint.hpp"
#include "defvec/config.hpp"
#include "defvec/embedding.hpp"
#include "defvec/error.hpp"
#include "defvec/eval.hpp"
#include "defvec/image.hpp"
#include "defvec/layers.hpp"
#include "defvec/pipeline.hpp"
#include "defvec/tensor.hpp"
#include "defvec/vocab.hpp"
