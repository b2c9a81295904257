# finlab Test Suite
