#pragma once

// Umbrella header. The HTTP LLM client lives in sdpost/http_llm.hpp and is
// not included here because it pulls in cpp-httplib.

#include "sdpost/adjudicator.hpp"
#include "sdpost/backends.hpp"
#include "sdpost/chunkrec.hpp"
#include "sdpost/core.hpp"
#include "sdpost/metrics.hpp"
#include "sdpost/mock_backends.hpp"
#include "sdpost/mock_scenarios.hpp"
#include "sdpost/pipeline.hpp"
#include "sdpost/reconcile.hpp"
#include "sdpost/refine.hpp"
#include "sdpost/reverify.hpp"
#include "sdpost/text.hpp"
