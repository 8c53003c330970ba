#pragma once

#include "wmmd/compressive.hpp"
#include "wmmd/dataset_io.hpp"
#include "wmmd/decoder.hpp"
#include "wmmd/discrepancy.hpp"
#include "wmmd/error.hpp"
#include "wmmd/kernel_json.hpp"
#include "wmmd/kernels.hpp"
#include "wmmd/lab.hpp"
#include "wmmd/measures.hpp"
#include "wmmd/network_simplex.hpp"
#include "wmmd/report.hpp"
#include "wmmd/rng.hpp"
#include "wmmd/sketch.hpp"
#include "wmmd/sketch_io.hpp"
#include "wmmd/slope.hpp"
#include "wmmd/tasks.hpp"
#include "wmmd/transport.hpp"
