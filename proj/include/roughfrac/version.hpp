#pragma once

#define ROUGHFRAC_VERSION_MAJOR 1
#define ROUGHFRAC_VERSION_MINOR 0
#define ROUGHFRAC_VERSION_PATCH 0
#define ROUGHFRAC_VERSION "1.0.0"
