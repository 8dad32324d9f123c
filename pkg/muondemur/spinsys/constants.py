# Bohr magneton over Planck constant, MHz/T
BOHR_MHZ_PER_T = 13996.245

# muon gyromagnetic ratio over 2π, MHz/T
GAMMA_MU_MHZ_PER_T = 135.5388

G_FREE_ELECTRON = 2.002319

MUON_LIFETIME_NS = 2197.0

# vacuum-like muonium hyperfine constant used by the isotropic recipes, MHz
A_MUONIUM_MHZ = 4500.0
