#pragma once

#include "fieldauth/errors.hpp"
#include "fieldauth/energy.hpp"
#include "fieldauth/design_space.hpp"
#include "fieldauth/image.hpp"
#include "fieldauth/minutiae.hpp"
#include "fieldauth/template_codec.hpp"
#include "fieldauth/matcher.hpp"
#include "fieldauth/body_channel.hpp"
#include "fieldauth/present.hpp"
#include "fieldauth/simulator.hpp"
