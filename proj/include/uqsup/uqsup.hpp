#pragma once

#include "uqsup/analysis.hpp"
#include "uqsup/errors.hpp"
#include "uqsup/io.hpp"
#include "uqsup/metrics.hpp"
#include "uqsup/pipeline.hpp"
#include "uqsup/quantifiers.hpp"
#include "uqsup/records.hpp"
#include "uqsup/supervisor.hpp"
#include "uqsup/synth.hpp"
