// io tests land with the module
