#pragma once

#include "bench.hpp"
#include "json_io.hpp"
#include "pipeline.hpp"
