#pragma once

#include "margin_mine/channels.hpp"
#include "margin_mine/core.hpp"
#include "margin_mine/error.hpp"
#include "margin_mine/eval.hpp"
#include "margin_mine/filters.hpp"
#include "margin_mine/io.hpp"
#include "margin_mine/job.hpp"
#include "margin_mine/knn.hpp"
#include "margin_mine/manifest.hpp"
#include "margin_mine/miner.hpp"
#include "margin_mine/preprocess.hpp"
