# SmbmSim package
