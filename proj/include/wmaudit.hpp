#pragma once

#include "wmaudit/error.hpp"
#include "wmaudit/util/hash.hpp"
#include "wmaudit/kb/embedding.hpp"
#include "wmaudit/kb/knowledge_base.hpp"
#include "wmaudit/kb/index_io.hpp"
#include "wmaudit/kb/inject.hpp"
#include "wmaudit/corpus/watermark.hpp"
#include "wmaudit/corpus/corpus_io.hpp"
#include "wmaudit/corpus/prompts.hpp"
#include "wmaudit/corpus/lint.hpp"
#include "wmaudit/backend/embedding.hpp"
#include "wmaudit/backend/generation.hpp"
#include "wmaudit/backend/http.hpp"
#include "wmaudit/backend/remote_embedding.hpp"
#include "wmaudit/backend/remote_generation.hpp"
#include "wmaudit/verify/eval.hpp"
#include "wmaudit/verify/metrics.hpp"
#include "wmaudit/verify/trial_log.hpp"
#include "wmaudit/verify/simscore.hpp"
#include "wmaudit/stats/incomplete_beta.hpp"
#include "wmaudit/stats/summary.hpp"
#include "wmaudit/stats/welch.hpp"
#include "wmaudit/stats/reference.hpp"
#include "wmaudit/stats/deployment.hpp"
#include "wmaudit/stats/sequential.hpp"
#include "wmaudit/stats/roc.hpp"
#include "wmaudit/stats/pca.hpp"
#include "wmaudit/transforms/raster.hpp"
#include "wmaudit/transforms/ops.hpp"
#include "wmaudit/transforms/png_io.hpp"
#include "wmaudit/audit/config.hpp"
#include "wmaudit/audit/session.hpp"
#include "wmaudit/audit/verify.hpp"
#include "wmaudit/audit/commands.hpp"
