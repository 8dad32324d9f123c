from muondemur.configuration.experiments import ConfigurationExperiments


# note that we are NOT using mixins here, but only the most advanced subclass
class Configuration(ConfigurationExperiments):
    pass
