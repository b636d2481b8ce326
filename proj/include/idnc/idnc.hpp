#pragma once

#include "idnc/core_model.hpp"
#include "idnc/errors.hpp"
#include "idnc/experiment.hpp"
#include "idnc/idnc_graph.hpp"
#include "idnc/mdp.hpp"
#include "idnc/random.hpp"
#include "idnc/scheduling.hpp"
#include "idnc/serialization.hpp"
#include "idnc/simulator.hpp"
#include "idnc/video_model.hpp"
