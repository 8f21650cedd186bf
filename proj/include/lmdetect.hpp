#pragma once

// Umbrella header for the lmdetect library.

#include "lmdetect/categorical.hpp"
#include "lmdetect/conjecture_lab.hpp"
#include "lmdetect/continuity.hpp"
#include "lmdetect/corpus.hpp"
#include "lmdetect/error.hpp"
#include "lmdetect/hash.hpp"
#include "lmdetect/hmm.hpp"
#include "lmdetect/hypotest.hpp"
#include "lmdetect/infometrics.hpp"
#include "lmdetect/markov.hpp"
#include "lmdetect/parallel.hpp"
#include "lmdetect/random.hpp"
#include "lmdetect/serialization.hpp"
#include "lmdetect/transport.hpp"
