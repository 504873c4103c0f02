#pragma once

#include "querysieve/classify.hpp"
#include "querysieve/clustering.hpp"
#include "querysieve/corpus.hpp"
#include "querysieve/error.hpp"
#include "querysieve/ingest.hpp"
#include "querysieve/pipeline.hpp"
#include "querysieve/random.hpp"
#include "querysieve/render.hpp"
#include "querysieve/similarity.hpp"
#include "querysieve/simulator.hpp"
#include "querysieve/text.hpp"
