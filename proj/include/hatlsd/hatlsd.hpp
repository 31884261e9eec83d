#pragma once

#include "hatlsd/config.hpp"
#include "hatlsd/detection.hpp"
#include "hatlsd/error.hpp"
#include "hatlsd/evalkit.hpp"
#include "hatlsd/field_io.hpp"
#include "hatlsd/geometry.hpp"
#include "hatlsd/gradient.hpp"
#include "hatlsd/hatfield.hpp"
#include "hatlsd/image.hpp"
#include "hatlsd/json_io.hpp"
#include "hatlsd/lsd.hpp"
#include "hatlsd/nfa.hpp"
#include "hatlsd/parallel.hpp"
#include "hatlsd/pseudolabel.hpp"
#include "hatlsd/rng.hpp"
#include "hatlsd/svg.hpp"
#include "hatlsd/synth.hpp"
