#pragma once

// Umbrella header.

#include "legalir/chunking.hpp"
#include "legalir/corpus.hpp"
#include "legalir/ensemble.hpp"
#include "legalir/error.hpp"
#include "legalir/fusion.hpp"
#include "legalir/gold.hpp"
#include "legalir/labeled_pair.hpp"
#include "legalir/lexical.hpp"
#include "legalir/metrics.hpp"
#include "legalir/paralaw.hpp"
#include "legalir/parallel.hpp"
#include "legalir/rng.hpp"
#include "legalir/scorer.hpp"
#include "legalir/subprocess_scorer.hpp"
#include "legalir/tokenizer.hpp"
#include "legalir/trainpairs.hpp"
#include "legalir/utf8.hpp"
