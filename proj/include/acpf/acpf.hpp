#pragma once

#include "acpf/config_space.hpp"
#include "acpf/errors.hpp"
#include "acpf/evaluation.hpp"
#include "acpf/fixtures.hpp"
#include "acpf/instances.hpp"
#include "acpf/kep.hpp"
#include "acpf/model_io.hpp"
#include "acpf/models.hpp"
#include "acpf/recommend.hpp"
#include "acpf/rng.hpp"
#include "acpf/scenario.hpp"
#include "acpf/search.hpp"
