#pragma once

#include "mobjust/calendar.hpp"
#include "mobjust/clustering.hpp"
#include "mobjust/config.hpp"
#include "mobjust/csv.hpp"
#include "mobjust/error.hpp"
#include "mobjust/format.hpp"
#include "mobjust/geo.hpp"
#include "mobjust/grid_index.hpp"
#include "mobjust/home.hpp"
#include "mobjust/ingest.hpp"
#include "mobjust/metrics.hpp"
#include "mobjust/parallel.hpp"
#include "mobjust/pipeline.hpp"
#include "mobjust/rng.hpp"
#include "mobjust/staypoint.hpp"
#include "mobjust/stats.hpp"
#include "mobjust/synth.hpp"
#include "mobjust/wkt.hpp"
