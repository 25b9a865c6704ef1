#pragma once

#include "embedding.hpp"
#include "error.hpp"
#include "fixture.hpp"
#include "io_binary.hpp"
#include "io_jsonl.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "protocols.hpp"
#include "random.hpp"
#include "report.hpp"
#include "similarity.hpp"
#include "version.hpp"
