EXIT_INVALID_INPUT = 2
EXIT_PROCESSING_ERROR = 3
